#![no_main]

use dgschwarz::mesh::build_uniform_square_mesh;
use dgschwarz::partition::{parse_partition_dump, Partition};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((sub, agg)) = parse_partition_dump(text) else {
        return;
    };
    assert_eq!(sub.len(), agg.len());
    // dumps matching a 2x2 or 3x3 mesh also go through validation
    for n in [2, 3] {
        let mesh = build_uniform_square_mesh(n);
        if sub.len() == mesh.n_elements() {
            if let Ok(p) = Partition::new(&mesh, sub.clone(), agg.clone()) {
                assert_eq!(parse_partition_dump(&p.to_dump()).unwrap(), (sub.clone(), agg.clone()));
            }
        }
    }
});
