#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = echosurf::report::parse_results_csv(text) {
        // Parsed rows round-trip and summarize without panicking.
        let csv = echosurf::report::results_to_csv(&rows);
        let again = echosurf::report::parse_results_csv(&csv).expect("round trip parses");
        assert_eq!(again, rows);
        let summary = echosurf::report::summarize(&rows);
        let _ = echosurf::report::gnuplot_layout(&summary);
        let _ = echosurf::report::summary_to_csv(&summary);
    }
});
