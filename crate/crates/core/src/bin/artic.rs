fn main() -> std::process::ExitCode {
    artic::cli::main()
}
