#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(frame) = echosurf::frames::load_frame(text) {
        // Anything that loads must survive a dump/load round trip intact.
        let dumped = echosurf::frames::dump_frame(&frame);
        let again = echosurf::frames::load_frame(&dumped).expect("round trip parses");
        assert_eq!(again, frame);
    }
});
