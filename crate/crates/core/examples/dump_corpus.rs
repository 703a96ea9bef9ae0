//! Write every corpus kernel to `<dir>/<name>.imcl` for use with the command line.

use imagecl::corpus;

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "kernels".to_string());
    std::fs::create_dir_all(&dir)?;
    for (name, src) in corpus::SOURCES {
        let path = std::path::Path::new(&dir).join(format!("{name}.imcl"));
        std::fs::write(&path, src)?;
        println!("{}", path.display());
    }
    Ok(())
}
