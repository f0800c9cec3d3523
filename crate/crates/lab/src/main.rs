use clap::Parser;

fn main() {
    let cli = lclab_cli::cli::Cli::parse();
    match lclab_cli::execute(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}
