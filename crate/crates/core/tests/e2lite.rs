mod common;

use common::{frames_dir, golden, message};
use proptest::prelude::*;
use ts_core::e2lite::{decode_message, encode_message, FrameReader};

#[test]
fn golden_frames_byte_match() {
    for (name, msg) in golden() {
        let want = std::fs::read(frames_dir().join(name)).unwrap();
        assert_eq!(encode_message(&msg).unwrap(), want, "{name}");
        assert_eq!(decode_message(&want).unwrap(), msg, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn fuzz_round_trip(msg in message()) {
        let bytes = encode_message(&msg).unwrap();
        prop_assert_eq!(encode_message(&msg).unwrap(), bytes.clone());
        prop_assert_eq!(decode_message(&bytes).unwrap(), msg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn stream_of_1000_frames_survives_fragmentation(
        msgs in prop::collection::vec(message(), 1000),
        cuts in prop::collection::vec(1usize..300, 1..400),
    ) {
        let bytes: Vec<u8> = msgs.iter().flat_map(|m| encode_message(m).unwrap()).collect();
        let mut reader = FrameReader::new();
        let mut got = Vec::new();
        let mut pos = 0;
        let mut i = 0;
        while pos < bytes.len() {
            let end = (pos + cuts[i % cuts.len()]).min(bytes.len());
            reader.push(&bytes[pos..end]);
            while let Some(m) = reader.next_message().unwrap() {
                got.push(m);
            }
            pos = end;
            i += 1;
        }
        prop_assert_eq!(got, msgs);
    }
}
