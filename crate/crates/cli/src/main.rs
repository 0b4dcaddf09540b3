use clap::Parser;

fn main() {
    let cli = match antac_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                antac_cli::exit::INPUT
            } else {
                antac_cli::exit::OK
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match antac_cli::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("antac: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
