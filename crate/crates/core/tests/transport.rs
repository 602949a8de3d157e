//! Network access is confined to the HTTP backend.

use std::path::{Path, PathBuf};

fn rust_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            rust_files(&p, out);
        } else if p.extension().is_some_and(|e| e == "rs") {
            out.push(p);
        }
    }
}

#[test]
fn only_the_http_backend_touches_the_network() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let mut files = Vec::new();
    rust_files(&root.join("src"), &mut files);
    rust_files(&root.join("../cli/src"), &mut files);
    let allowed = root.join("src/backend/http.rs");
    let mut seen_http = false;
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        let uses_net = ["reqwest", "std::net", "TcpStream", "UdpSocket"].iter().any(|w| text.contains(w));
        if f == allowed {
            seen_http = uses_net;
        } else {
            assert!(!uses_net, "{} uses a network transport", f.display());
        }
    }
    assert!(seen_http, "http backend not found");
}
