use std::process::ExitCode;

fn main() -> ExitCode {
    chroma::cli::main()
}
