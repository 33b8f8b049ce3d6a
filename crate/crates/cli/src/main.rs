use clap::Parser;

fn main() {
    let cli = sdrc_cli::Cli::parse();
    match sdrc_cli::run(&cli) {
        Ok(Some(dir)) => eprintln!("wrote {}", dir.display()),
        Ok(None) => {}
        Err(e) => {
            eprintln!("sdrc: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
