#![no_main]

use libfuzzer_sys::fuzz_target;
use pbinfer::gwas::{maf_filter, read_geno_csv, write_geno_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = read_geno_csv(data) {
        let mut buf = Vec::new();
        write_geno_csv(&g, &mut buf).unwrap();
        assert_eq!(read_geno_csv(buf.as_slice()).unwrap(), g);
        let kept = maf_filter(&g, 0.01).unwrap();
        assert!(kept.n_variants() <= g.n_variants());
    }
});
