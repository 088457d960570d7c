fn main() -> std::process::ExitCode {
    fearover::cli::main()
}
