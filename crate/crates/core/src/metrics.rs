//! Image and mask quality metrics plus per-view report aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ColorImage};

/// PSNR in dB over `region` (or the whole image), with the squared error pooled over all
/// three channels. Identical inputs give `f64::INFINITY`.
pub fn psnr(a: &ColorImage, b: &ColorImage, region: Option<&BinaryMask>) -> Result<f64> {
    a.ensure_same_dims(b, "second image")?;
    if let Some(r) = region {
        a.ensure_same_dims(r, "psnr region")?;
    }
    let mut sse: u64 = 0;
    let mut count: u64 = 0;
    for (i, (pa, pb)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
        if region.is_some_and(|r| !r.as_slice()[i]) {
            continue;
        }
        for c in 0..3 {
            let d = i64::from(pa[c]) - i64::from(pb[c]);
            sse += (d * d) as u64;
        }
        count += 3;
    }
    if count == 0 {
        return Err(Error::EmptyInput("psnr region is empty"));
    }
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / count as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskScore {
    pub accuracy: f64,
    pub iou: f64,
    pub dice: f64,
}

/// Raw pixel counts behind a [`MaskScore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskCounts {
    pub total: usize,
    pub matching: usize,
    pub pred: usize,
    pub gt: usize,
    pub intersection: usize,
    pub union: usize,
}

pub fn mask_counts(pred: &BinaryMask, gt: &BinaryMask) -> Result<MaskCounts> {
    pred.ensure_same_dims(gt, "ground-truth mask")?;
    let mut c = MaskCounts {
        total: pred.len(),
        matching: 0,
        pred: 0,
        gt: 0,
        intersection: 0,
        union: 0,
    };
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        c.matching += usize::from(p == g);
        c.pred += usize::from(p);
        c.gt += usize::from(g);
        c.intersection += usize::from(p && g);
        c.union += usize::from(p || g);
    }
    Ok(c)
}

/// Pixel accuracy, IoU and Dice. Two empty masks score IoU = Dice = 1.
pub fn mask_score(pred: &BinaryMask, gt: &BinaryMask) -> Result<MaskScore> {
    let c = mask_counts(pred, gt)?;
    if c.total == 0 {
        return Err(Error::EmptyInput("masks have no pixels"));
    }
    let (iou, dice) = if c.union == 0 {
        (1.0, 1.0)
    } else {
        (
            c.intersection as f64 / c.union as f64,
            2.0 * c.intersection as f64 / (c.pred + c.gt) as f64,
        )
    };
    Ok(MaskScore {
        accuracy: c.matching as f64 / c.total as f64,
        iou,
        dice,
    })
}

/// Scores of one view. `None` means the metric could not be computed for that view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScores {
    pub view_id: String,
    #[serde(with = "psnr_json")]
    pub psnr_full: Option<f64>,
    #[serde(with = "psnr_json")]
    pub psnr_mask: Option<f64>,
    pub acc: Option<f64>,
    pub iou: Option<f64>,
    pub dice: Option<f64>,
    pub lpips: Option<f64>,
    pub fid: Option<f64>,
}

impl ViewScores {
    pub fn new(view_id: impl Into<String>) -> Self {
        ViewScores {
            view_id: view_id.into(),
            psnr_full: None,
            psnr_mask: None,
            acc: None,
            iou: None,
            dice: None,
            lpips: None,
            fid: None,
        }
    }

    pub fn with_mask_score(mut self, s: MaskScore) -> Self {
        self.acc = Some(s.accuracy);
        self.iou = Some(s.iou);
        self.dice = Some(s.dice);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub psnr_full: Option<f64>,
    pub psnr_mask: Option<f64>,
    pub acc: Option<f64>,
    pub iou: Option<f64>,
    pub dice: Option<f64>,
    /// Learned metrics are computed by external tooling; always null here.
    pub lpips: Option<f64>,
    pub fid: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfinityCounts {
    pub psnr_full: usize,
    pub psnr_mask: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub per_view: Vec<ViewScores>,
    pub means: MeanScores,
    pub infinity_count: InfinityCounts,
    /// View ids present on only one side of an evaluation.
    pub orphans: Vec<String>,
}

/// Averages every metric over the views that have it. Infinite PSNRs are left out of the
/// mean and counted instead.
pub fn aggregate_report(per_view: Vec<ViewScores>) -> Result<Report> {
    if per_view.is_empty() {
        return Err(Error::EmptyInput("no per-view scores to aggregate"));
    }
    fn mean(vals: impl Iterator<Item = f64>) -> Option<f64> {
        let (sum, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
    let finite = |f: fn(&ViewScores) -> Option<f64>| {
        mean(per_view.iter().filter_map(f).filter(|v| v.is_finite()))
    };
    let infinite = |f: fn(&ViewScores) -> Option<f64>| {
        per_view
            .iter()
            .filter_map(f)
            .filter(|v| v.is_infinite())
            .count()
    };
    let means = MeanScores {
        psnr_full: finite(|v| v.psnr_full),
        psnr_mask: finite(|v| v.psnr_mask),
        acc: finite(|v| v.acc),
        iou: finite(|v| v.iou),
        dice: finite(|v| v.dice),
        lpips: None,
        fid: None,
    };
    let infinity_count = InfinityCounts {
        psnr_full: infinite(|v| v.psnr_full),
        psnr_mask: infinite(|v| v.psnr_mask),
    };
    Ok(Report {
        per_view,
        means,
        infinity_count,
        orphans: Vec::new(),
    })
}

/// PSNR values in JSON: numbers, `"inf"` for identical images, `null` when absent.
mod psnr_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_infinite() => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("bad psnr `{t}`"))),
        }
    }
}
