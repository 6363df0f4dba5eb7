fn main() { println!("chsh3"); }
