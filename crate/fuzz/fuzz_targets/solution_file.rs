#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(sol) = gilbert::cli::files::parse_solution(s) {
            let _ = gilbert::cli::svg::render(&sol);
        }
    }
});
