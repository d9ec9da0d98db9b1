#![no_main]

use libfuzzer_sys::fuzz_target;
use pbinfer::gwas::{read_pheno_csv, write_pheno_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = read_pheno_csv(data) {
        let mut buf = Vec::new();
        write_pheno_csv(&p, &mut buf).unwrap();
        assert_eq!(read_pheno_csv(buf.as_slice()).unwrap(), p);
    }
});
