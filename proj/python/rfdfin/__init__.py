"""Python bindings for the rfdfin fingerprint forgery detector."""

from ._rfdfin import (
    Detector,
    Error,
    SdnCorrection,
    SpectrumDictionary,
    apply_pdc,
    apply_sdn,
    dct_log_spectrum,
    fft_log_spectrum,
    fit_power_dictionary,
    fit_sdn,
    mean_log_spectrum,
    read_image,
    ridge_feature,
    ridge_preprocess,
    run_cli,
    sdn_plus_plus,
    synth_impression,
    write_image,
)

__all__ = [
    "Detector",
    "Error",
    "SdnCorrection",
    "SpectrumDictionary",
    "apply_pdc",
    "apply_sdn",
    "dct_log_spectrum",
    "fft_log_spectrum",
    "fit_power_dictionary",
    "fit_sdn",
    "mean_log_spectrum",
    "read_image",
    "ridge_feature",
    "ridge_preprocess",
    "run_cli",
    "sdn_plus_plus",
    "synth_impression",
    "write_image",
]
