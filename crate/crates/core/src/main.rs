fn main() {
    groundtree::cli::run();
}
