#![no_main]

use dgschwarz::mesh::Mesh;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = Mesh::from_text(text) {
        let again = Mesh::from_text(&mesh.to_text()).expect("serialized mesh must parse");
        assert_eq!(again.vertices(), mesh.vertices());
        assert_eq!(again.triangles(), mesh.triangles());
        assert_eq!(again.materials(), mesh.materials());
    }
});
