fn main() -> std::process::ExitCode {
    vsched::gateway::cli::main()
}
