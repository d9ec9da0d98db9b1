//! Replays the checked-in fuzz corpus through the same checks as the fuzz
//! targets, and throws arbitrary bytes at every parser.

use std::fs;
use std::path::PathBuf;

use pbinfer::gwas::{maf_filter, read_geno_csv, read_pheno_csv, write_geno_csv, write_pheno_csv};
use pbinfer::sim::{emit_table, parse_summary_csv, SimScenario, TableFormat};
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

fn config_json(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match SimScenario::from_json(text) {
        Ok(list) => {
            let again = serde_json::to_string(&list).unwrap();
            assert_eq!(SimScenario::from_json(&again).unwrap(), list);
            true
        }
        Err(_) => false,
    }
}

fn pheno_csv(data: &[u8]) -> bool {
    match read_pheno_csv(data) {
        Ok(p) => {
            let mut buf = Vec::new();
            write_pheno_csv(&p, &mut buf).unwrap();
            assert_eq!(read_pheno_csv(buf.as_slice()).unwrap(), p);
            true
        }
        Err(_) => false,
    }
}

fn geno_csv(data: &[u8]) -> bool {
    match read_geno_csv(data) {
        Ok(g) => {
            let mut buf = Vec::new();
            write_geno_csv(&g, &mut buf).unwrap();
            assert_eq!(read_geno_csv(buf.as_slice()).unwrap(), g);
            assert!(maf_filter(&g, 0.01).unwrap().n_variants() <= g.n_variants());
            true
        }
        Err(_) => false,
    }
}

fn summary_csv(data: &[u8]) -> bool {
    match parse_summary_csv(data) {
        Ok(rows) => {
            let mut csv = Vec::new();
            emit_table(&rows, TableFormat::Csv, &mut csv).unwrap();
            assert_eq!(parse_summary_csv(csv.as_slice()).unwrap().len(), rows.len());
            emit_table(&rows, TableFormat::Md, &mut Vec::new()).unwrap();
            true
        }
        Err(_) => false,
    }
}

#[test]
fn corpus_seeds_parse_as_labelled() {
    type Check = fn(&[u8]) -> bool;
    let targets: [(&str, Check, &[&str]); 4] = [
        ("config_json", config_json, &["array.json", "single.json"]),
        ("pheno_csv", pheno_csv, &["quoted.csv", "simulated.csv"]),
        (
            "geno_csv",
            geno_csv,
            &["dosages.csv", "no_variants.csv", "simulated.csv"],
        ),
        (
            "summary_csv",
            summary_csv,
            &["empty_scenario.csv", "header_only.csv", "run.csv"],
        ),
    ];
    for (target, check, valid) in targets {
        for (name, data) in seeds(target) {
            assert_eq!(check(&data), valid.contains(&name.as_str()), "{target}/{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parsers_never_panic(data in prop::collection::vec(any::<u8>(), 0..512)) {
        config_json(&data);
        pheno_csv(&data);
        geno_csv(&data);
        summary_csv(&data);
    }

    #[test]
    fn csv_shaped_input_never_panics(
        cells in prop::collection::vec(prop::collection::vec("[-0-9.eE,a-z]{0,6}", 1..5), 1..8),
        head in prop::sample::select(vec!["id,y,yhat,c1", "id,v1,v2", "id"]),
    ) {
        let mut text = String::from(head);
        for row in cells {
            text.push('\n');
            text.push_str(&row.join(","));
        }
        pheno_csv(text.as_bytes());
        geno_csv(text.as_bytes());
    }
}
