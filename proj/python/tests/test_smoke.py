import numpy as np
import pytest

import rfdfin


def test_spectrum_matches_numpy():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(24, 40), dtype=np.uint8)
    ours = rfdfin.fft_log_spectrum(img)
    ref = np.log(np.abs(np.fft.fft2(img.astype(np.float64))) + 1e-18)
    assert ours.shape == (24, 40)
    np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-9)


def test_synth_and_ridge_feature():
    img = rfdfin.synth_impression(3, 0, fake=False, size=128)
    assert img.dtype == np.uint8 and img.shape == (128, 128)
    again = rfdfin.synth_impression(3, 0, fake=False, size=128)
    assert np.array_equal(img, again)
    skel = rfdfin.ridge_preprocess(img)
    assert set(np.unique(skel)) <= {0, 255}
    feat = rfdfin.ridge_feature(img, crop=128)
    assert feat is not None and len(feat) == 128
    assert rfdfin.ridge_feature(np.full((64, 64), 255, np.uint8), crop=64) is None


def test_sdn_identity_and_errors():
    imgs = [rfdfin.synth_impression(s, 0, size=64) for s in range(3)]
    corr = rfdfin.fit_sdn(imgs, imgs)
    assert np.abs(corr.delta).max() == 0.0
    out = rfdfin.apply_sdn(imgs[0], corr)
    assert np.abs(out.astype(int) - imgs[0].astype(int)).max() <= 1
    with pytest.raises(rfdfin.Error) as info:
        rfdfin.fit_sdn([], imgs)
    assert info.value.code == "EmptyCorpus"


def test_detector_predict_and_roundtrip(tmp_path):
    det = rfdfin.Detector(seed=1)
    assert 50_000 <= det.param_count <= 200_000
    imgs = [rfdfin.synth_impression(s, 0, fake=bool(s % 2)) for s in range(2)]
    preds = det.predict(imgs)
    assert len(preds) == 2 and set(preds) <= {0, 1}
    det.save(tmp_path / "m.rfdf")
    assert rfdfin.Detector.load(tmp_path / "m.rfdf").predict(imgs) == preds


def test_cli_usage():
    assert rfdfin.run_cli(["--help"]) == 0
    assert rfdfin.run_cli(["frobnicate"]) == 1
