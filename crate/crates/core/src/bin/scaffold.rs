fn main() {
    std::process::exit(scene_scaffold::cli::main());
}
