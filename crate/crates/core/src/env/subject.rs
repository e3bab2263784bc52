use crate::env::config::SignalKind;
use crate::volume::{PeaksVolume, Phantom, ScalarVolume, VectorVolume};
use crate::{Error, Result};

/// The volumes one tracking run needs, all on the same grid.
#[derive(Debug, Clone)]
pub struct Subject {
    pub signal: VectorVolume,
    pub peaks: PeaksVolume,
    pub wm: ScalarVolume,
    pub interface: ScalarVolume,
    pub fa: ScalarVolume,
    pub rois: ScalarVolume,
}

impl Subject {
    pub fn new(
        signal: VectorVolume,
        peaks: PeaksVolume,
        wm: ScalarVolume,
        interface: ScalarVolume,
        fa: ScalarVolume,
        rois: ScalarVolume,
    ) -> Result<Self> {
        let dims = signal.dims();
        let others = [
            ("peaks", peaks.dims(), peaks.affine()),
            ("wm", wm.dims(), wm.affine()),
            ("interface", interface.dims(), interface.affine()),
            ("fa", fa.dims(), fa.affine()),
            ("rois", rois.dims(), rois.affine()),
        ];
        for (name, d, a) in others {
            if d != dims || a != signal.affine() {
                return Err(Error::ShapeMismatch(format!(
                    "{name} volume grid {d:?} does not match signal grid {dims:?}"
                )));
            }
        }
        Ok(Self { signal, peaks, wm, interface, fa, rois })
    }

    pub fn from_phantom(ph: &Phantom, kind: SignalKind) -> Self {
        let signal = match kind {
            SignalKind::Fodf => ph.fodf.clone(),
            SignalKind::Raw => ph.raw_signal.clone(),
        };
        Self {
            signal,
            peaks: ph.peaks.clone(),
            wm: ph.wm_mask.clone(),
            interface: ph.interface_mask.clone(),
            fa: ph.fa.clone(),
            rois: ph.rois.clone(),
        }
    }

    pub fn voxel_size(&self) -> f64 {
        self.signal.affine().mean_voxel_size()
    }
}
