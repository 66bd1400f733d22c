//! Local-maximum detection with topographic prominence.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    pub prominence: f64,
}

/// Peaks of one period of a periodic signal, with neighbours wrapping around.
///
/// A peak is a sample strictly above its left neighbour and not below its
/// right one. Its prominence is the height above the higher of the two
/// lowest points reached when walking left and right until a strictly
/// higher sample (or a full cycle). The global maximum's prominence is the
/// signal's peak-to-peak range.
pub fn cyclic_peaks(signal: &[f64]) -> Vec<Peak> {
    let n = signal.len();
    if n < 3 {
        return Vec::new();
    }
    let at = |i: isize| signal[i.rem_euclid(n as isize) as usize];
    let mut peaks = Vec::new();
    for i in 0..n {
        let v = signal[i];
        let ii = i as isize;
        if !(v > at(ii - 1) && v >= at(ii + 1)) {
            continue;
        }
        let walk = |step: isize| {
            let mut lowest = v;
            for k in 1..n as isize {
                let s = at(ii + step * k);
                if s > v {
                    break;
                }
                lowest = lowest.min(s);
            }
            lowest
        };
        let base = walk(-1).max(walk(1));
        peaks.push(Peak { index: i, value: v, prominence: v - base });
    }
    peaks
}

/// Peaks whose prominence is at least `fraction` of the signal's range.
pub fn prominent_peaks(signal: &[f64], fraction: f64) -> Vec<Peak> {
    let range = peak_to_peak(signal);
    cyclic_peaks(signal).into_iter().filter(|p| range > 0.0 && p.prominence >= fraction * range).collect()
}

pub fn peak_to_peak(signal: &[f64]) -> f64 {
    let max = signal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = signal.iter().copied().fold(f64::INFINITY, f64::min);
    if signal.is_empty() {
        0.0
    } else {
        max - min
    }
}
