fn main() {
    let stdin = std::io::stdin();
    let mut streams = bnlu_cli::Streams {
        stdin: &mut stdin.lock(),
        stdout: &mut std::io::stdout(),
        stderr: &mut std::io::stderr(),
    };
    let code = bnlu_cli::run(std::env::args_os(), &mut streams);
    std::process::exit(code);
}
