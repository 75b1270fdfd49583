fn main() { greenlab::cli::noop(); }
