"""Complex linear coding speech enhancement (C++ core)."""

from ._clcnet import (
    FRAME_LEN,
    HOP,
    SAMPLE_RATE,
    ConfigError,
    DataError,
    Error,
    Model,
    NumericError,
    active_snr_db,
    algorithmic_latency_ms,
    analyze,
    apply_clc,
    autocorrelation,
    levinson_durbin,
    lpc_covariance,
    lpc_predict,
    oracle_clc_coeffs,
    oracle_wiener_gain,
    read_wav,
    rmse,
    si_sdr,
    stoi,
    synth_noise,
    synth_speech,
    synthesize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
