#![no_main]

use gse_lvrt::report::RunReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(report) = RunReport::from_json(data) else {
        return;
    };
    let json = report.to_json().expect("decoded report encodes");
    let back = RunReport::from_json(&json).expect("encoded report decodes");
    assert_eq!(back, report);
});
