import tilecrypt


def test_segment_round_trip():
    master, params = tilecrypt.setup(b"py-seed")
    assert params and master != params
    seg = tilecrypt.synth_segment("pattern=PB\nsize_seed=3\n")
    types = tilecrypt.frame_types(seg)
    assert types[0] == "I" and "B" in types and "P" in types
    key = tilecrypt.keygen(master, "alice", {"subscriber"})
    for level in ("None", "AllI", "AllIP", "Full"):
        enc = tilecrypt.encrypt_segment(seg, level, "subscriber", master)
        assert tilecrypt.decrypt_segment(enc, key) == seg
    enc = tilecrypt.encrypt_segment(seg, "AllI", "subscriber", master)
    assert len(enc) - len(seg) == tilecrypt.blob_overhead("subscriber") == 117


def test_unsatisfied_key_is_refused():
    master, _ = tilecrypt.setup(b"py-seed")
    seg = tilecrypt.synth_segment()
    enc = tilecrypt.encrypt_segment(seg, "AllIP", "subscriber", master)
    guest = tilecrypt.keygen(master, "guest", {"guest"})
    try:
        tilecrypt.decrypt_segment(enc, guest)
    except RuntimeError as e:
        assert "olicy" in str(e)
    else:
        raise AssertionError("guest key decrypted the segment")


def test_viewport():
    cov = tilecrypt.tile_coverage(0.0, 0.0)
    assert cov == {5: 1.0}
    corner = tilecrypt.tile_coverage(60.0, -30.0)
    assert sorted(corner) == [5, 6, 8, 9]
    assert abs(sum(corner.values()) - 1.0) < 1e-12
    major, minors = tilecrypt.select_tiles(0.0, 0.0)
    assert major == 5 and len(minors) == 3


def test_short_simulation():
    rows = tilecrypt.run_metrics(mode="abe-alliP", cache_mb=20, video_duration_s=20, clients=6)
    assert rows
    crypto = [float(r["value"]) for r in rows if r["scope"] == "cache" and r["metric"] == "crypto_work"]
    assert crypto and all(v == 0.0 for v in crypto)
    assert tilecrypt.simulate(mode="https", video_duration_s=20, clients=6) == tilecrypt.simulate(
        mode="https", video_duration_s=20, clients=6
    )


def test_cli_usage_error():
    assert tilecrypt.main(["setup"]) == 2
