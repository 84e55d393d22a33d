use std::path::Path;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for (name, text) in splitplan::fixtures::generated() {
        std::fs::write(dir.join(&name), text)?;
        println!("wrote {name}");
    }
    Ok(())
}
