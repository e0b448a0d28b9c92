fn main() -> std::process::ExitCode {
    enlargement::cli::main()
}
