"""Hand-assembles the golden E2-lite frames. Run from this directory."""
import struct


def frame(msg_type, node, ts, payload=b""):
    return b"E2LT" + struct.pack("<BBIQI", 1, msg_type, node, ts, len(payload)) + payload


def s(text):
    b = text.encode()
    return struct.pack("<I", len(b)) + b


frames = {
    "subscription_ack_node7.bin": frame(2, 7, 0),
    "subscription_request_node3.bin": frame(
        1, 3, 1_700_000_000_000,
        struct.pack("<II", 100, 2) + s("prb_util_pct") + s("sinr_db"),
    ),
    "kpm_indication_node3.bin": frame(
        3, 3, 1_700_000_001_200,
        struct.pack("<Q", 1200)
        + struct.pack("<IdIIddd", 3, 42.5, 2, 150, 0.25, 0.5, 0.25)
        + struct.pack("<I", 1)
        + struct.pack("<IdI", 9, 1.5e6, 2)
        + struct.pack("<IdId", 1, -3.0, 3, 12.25),
    ),
    "ric_control_node2.bin": frame(4, 2, 1_700_000_000_300, struct.pack("<II", 17, 5)),
    "control_ack_node2.bin": frame(5, 2, 1_700_000_000_300, struct.pack("<II", 17, 5)),
    "barrier_node8.bin": frame(4, 8, 1_700_000_000_300, struct.pack("<II", 0xFFFFFFFF, 0)),
}

for name, data in frames.items():
    with open(name, "wb") as f:
        f.write(data)
