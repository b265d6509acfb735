#![no_main]

use gse_lvrt::config::ScenarioFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // Accepted files must also yield a consistent model view.
    if let Ok(file) = ScenarioFile::parse(data) {
        let _ = file.system_params();
        let _ = file.scenario();
        let _ = file.integrator();
        let _ = file.farm_spec();
        if let Some(s) = &file.sweep {
            assert_eq!(s.cases().len(), s.u_g2.len());
        }
    }
});
