fn main() -> std::process::ExitCode {
    hopwalk::cli::main()
}
