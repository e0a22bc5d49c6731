#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // Errors are fine; panics are not.
        if let Ok(inst) = gilbert::cli::files::parse_instance(s) {
            let text = gilbert::cli::files::instance_to_json(&inst);
            assert!(gilbert::cli::files::parse_instance(&text).is_ok());
        }
    }
});
