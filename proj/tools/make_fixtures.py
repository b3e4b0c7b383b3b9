#!/usr/bin/env python3
"""Regenerates the committed scenario fixtures in fixtures/.

Arrivals are spaced one full voting cycle plus dwell apart (13600 ms) so each
presentation meets an idle kiosk; denials and retries get the same slots for
uniformity. Run from the repository root: python3 tools/make_fixtures.py
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

CARD_KEY = "000102030405060708090a0b0c0d0e0f"
VOTE_KEY = "101112131415161718191a1b1c1d1e1f"
REGISTRY_KEY = "202122232425262728292a2b2c2d2e2f"
DEVICE_KEYS = {
    "TERM0001": "303132333435363738393a3b3c3d3e3f",
    "TERM0002": "404142434445464748494a4b4c4d4e4f",
}

SLOT_MS = 13600  # 11500 ms cycle + 2000 ms dwell + margin
FIRST_MS = 1000


def uid(i):
    return f"{0xA0000000 + i:08x}"


def unknown_uid(i):
    return f"{0xB0000000 + i:08x}"


def slot(k):
    return FIRST_MS + SLOT_MS * k


def keys(devices):
    return {
        "card_key": CARD_KEY,
        "vote_key": VOTE_KEY,
        "registry_key": REGISTRY_KEY,
        "device_keys": {d: DEVICE_KEYS[d] for d in devices},
    }


def ballot(n):
    names = ["Alpha", "Beta", "Gamma", "Delta"]
    return [{"id": i + 1, "name": names[i]} for i in range(n)]


def write(name, doc):
    path = OUT / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


def baseline():
    """100 genuine voters plus 20 forged presentations across two kiosks."""
    devices = ["TERM0001", "TERM0002"]
    voters = []
    next_slot = {d: 0 for d in devices}
    for i in range(100):
        d = devices[i % 2]
        voters.append(
            {
                "uid": uid(i),
                "candidate": 1 + i % 3,
                "arrival_ms": slot(next_slot[d]),
                "device": d,
            }
        )
        next_slot[d] += 1

    forged = []
    # 7 genuine uids with flipped tokens, 7 unregistered uids, 6 altered uids.
    for i in range(7):
        d = devices[i % 2]
        forged.append(
            {"kind": "bad_token", "uid": uid(i), "arrival_ms": slot(next_slot[d]), "device": d}
        )
        next_slot[d] += 1
    for i in range(7):
        d = devices[i % 2]
        forged.append(
            {
                "kind": "unknown_uid",
                "uid": unknown_uid(i),
                "arrival_ms": slot(next_slot[d]),
                "device": d,
            }
        )
        next_slot[d] += 1
    for i in range(6):
        d = devices[i % 2]
        forged.append(
            {
                "kind": "altered_uid",
                "uid": uid(2 * i),
                "source_uid": uid(2 * i + 1),
                "arrival_ms": slot(next_slot[d]),
                "device": d,
            }
        )
        next_slot[d] += 1

    write(
        "baseline.json",
        {
            "seed": 11,
            "batch_size": 20,
            "keys": keys(devices),
            "ballot": ballot(3),
            "devices": devices,
            "voters": voters,
            "forged": forged,
        },
    )


def offline():
    """80 voters on one kiosk with the uplink down for the whole session."""
    voters = [
        {
            "uid": uid(i),
            "candidate": 1 + i % 3,
            "arrival_ms": slot(i),
            "device": "TERM0001",
        }
        for i in range(80)
    ]
    close = slot(79) + 14500
    write(
        "offline.json",
        {
            "seed": 12,
            "batch_size": 20,
            "keys": keys(["TERM0001"]),
            "ballot": ballot(3),
            "devices": ["TERM0001"],
            "voters": voters,
            "close_ms": close,
            "link": {"windows": [{"from_ms": 0, "to_ms": close, "state": "down"}]},
        },
    )


def double_vote():
    """30 voters who each present their already-used card once more."""
    revisit_base = slot(30)
    voters = [
        {
            "uid": uid(i),
            "candidate": 1 + i % 2,
            "arrival_ms": slot(i),
            "device": "TERM0001",
            "revisit_ms": revisit_base + 3000 * i,
        }
        for i in range(30)
    ]
    write(
        "double_vote.json",
        {
            "seed": 13,
            "batch_size": 20,
            "keys": keys(["TERM0001"]),
            "ballot": ballot(2),
            "devices": ["TERM0001"],
            "voters": voters,
        },
    )


def clone():
    """An altered card (stale token) and a bitwise clone at a second kiosk.

    The victim votes early on TERM0001 and that entry syncs at the 30 s kick;
    the clone then votes on TERM0002, so the server sees the duplicate uid
    arrive from a second device.
    """
    devices = ["TERM0001", "TERM0002"]
    voters = [
        {"uid": uid(0), "candidate": 1, "arrival_ms": slot(0), "device": "TERM0001"},
        {"uid": uid(1), "candidate": 2, "arrival_ms": slot(1), "device": "TERM0001"},
        {"uid": uid(2), "candidate": 1, "arrival_ms": slot(0), "device": "TERM0002"},
        {"uid": uid(3), "candidate": 2, "arrival_ms": slot(1), "device": "TERM0002"},
    ]
    forged = [
        {
            "kind": "altered_uid",
            "uid": uid(3),
            "source_uid": uid(2),
            "arrival_ms": 30000,
            "device": "TERM0002",
        }
    ]
    clones = [{"uid": uid(0), "candidate": 2, "arrival_ms": 40000, "device": "TERM0002"}]
    write(
        "clone.json",
        {
            "seed": 14,
            "batch_size": 20,
            "keys": keys(devices),
            "ballot": ballot(2),
            "devices": devices,
            "voters": voters,
            "forged": forged,
            "clones": clones,
        },
    )


def endurance():
    """120 sequential voter interactions on a single kiosk."""
    voters = [
        {
            "uid": uid(i),
            "candidate": 1 + i % 2,
            "arrival_ms": slot(i),
            "device": "TERM0001",
        }
        for i in range(120)
    ]
    write(
        "endurance.json",
        {
            "seed": 15,
            "batch_size": 20,
            "keys": keys(["TERM0001"]),
            "ballot": ballot(2),
            "devices": ["TERM0001"],
            "voters": voters,
        },
    )


def interception(name, swapped):
    """Six voters; variant b swaps exactly one voter's intended candidate."""
    choices = [1, 2, 1, 2, 1, 2]
    if swapped:
        choices[2] = 2
    voters = [
        {
            "uid": uid(i),
            "candidate": choices[i],
            "arrival_ms": slot(i),
            "device": "TERM0001",
        }
        for i in range(6)
    ]
    write(
        name,
        {
            "seed": 16,
            "batch_size": 20,
            "keys": keys(["TERM0001"]),
            "ballot": ballot(2),
            "devices": ["TERM0001"],
            "voters": voters,
        },
    )


def main():
    OUT.mkdir(exist_ok=True)
    baseline()
    offline()
    double_vote()
    clone()
    endurance()
    interception("interception_a.json", swapped=False)
    interception("interception_b.json", swapped=True)


if __name__ == "__main__":
    main()
