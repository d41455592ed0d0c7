use viewprop::metrics::aggregate_report;
use viewprop::{mask_score, psnr, BinaryMask, ColorImage, ViewScores};

fn main() -> viewprop::Result<()> {
    let a = ColorImage::filled(64, 64, [10, 20, 30]);
    let b = ColorImage::filled(64, 64, [26, 36, 46]);
    println!("PSNR, uniform offset of 16: {:.4} dB", psnr(&a, &b, None)?);
    println!("PSNR, identical: {}", psnr(&a, &a, None)?);

    let gt = BinaryMask::from_fn(64, 64, |x, y| (16..48).contains(&x) && (16..48).contains(&y));
    let pred = BinaryMask::from_fn(64, 64, |x, y| (18..50).contains(&x) && (16..48).contains(&y));
    let s = mask_score(&pred, &gt)?;
    println!("shifted square: accuracy {:.4}, IoU {:.4}, Dice {:.4}", s.accuracy, s.iou, s.dice);

    let mut v0 = ViewScores::new("v0").with_mask_score(s);
    v0.psnr_full = Some(psnr(&a, &b, None)?);
    let mut v1 = ViewScores::new("v1");
    v1.psnr_full = Some(f64::INFINITY);
    let report = aggregate_report(vec![v0, v1])?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
