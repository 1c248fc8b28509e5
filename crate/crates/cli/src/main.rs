fn main() -> std::process::ExitCode {
    msqaoa_cli::main_with_args(std::env::args_os())
}
