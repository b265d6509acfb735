#![no_main]

use gse_lvrt::config::ScenarioFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(file) = ScenarioFile::parse(data) else {
        return;
    };
    let text = file.to_toml_string().expect("valid file serializes");
    let back = ScenarioFile::parse(&text).expect("serialized file parses");
    assert_eq!(back, file);
    assert_eq!(back.scenario(), file.scenario());
    assert_eq!(back.system_params(), file.system_params());
});
