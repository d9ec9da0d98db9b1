#![no_main]

use libfuzzer_sys::fuzz_target;
use pbinfer::sim::{emit_table, parse_summary_csv, TableFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_summary_csv(data) {
        let mut csv = Vec::new();
        emit_table(&rows, TableFormat::Csv, &mut csv).unwrap();
        assert_eq!(parse_summary_csv(csv.as_slice()).unwrap().len(), rows.len());
        emit_table(&rows, TableFormat::Md, &mut Vec::new()).unwrap();
    }
});
