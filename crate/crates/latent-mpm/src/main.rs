fn main() {
    std::process::exit(latent_mpm::cli::run());
}
