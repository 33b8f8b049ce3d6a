//! Turning detector waveforms into reservoir states.

pub mod envelope;
pub mod extract;
pub mod features;
pub mod filter;

pub use envelope::{detect_diode, envelope_diode, envelope_rms, DiodeParams, Rectifier, SymbolWindows};
pub use extract::{
    emulation_pool_filters, extract_spectral_states, extract_virtual_states, hardware_preset_filters,
    hardware_preset_nodes, max_virtual_nodes, pool_nodes, Envelope, NodeLabel, NodeSpec, StateMatrix,
    HARDWARE_DETECTORS, HARDWARE_PASSBANDS_MHZ,
};
pub use filter::{design_bandpass, filter_signal, Biquad, FilterSpec, SosFilter};
pub use features::polynomial_features;
