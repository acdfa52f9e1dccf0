use std::path::Path;
use std::process::Command;

use inpaint_core::fixtures;
use inpaint_core::grid::{GrayImage, Mask};
use inpaint_core::io::{load_image, read_intensities, read_trace, save_image};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sobinpaint"))
}

fn mask_image(mask: &Mask) -> GrayImage {
    let (h, w) = mask.shape();
    GrayImage::from_fn(h, w, |i, j| if mask.get(i, j) { 1.0 } else { 0.0 })
}

fn write_problem(dir: &Path, n: usize, hole: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let (img, mask) = fixtures::stripe(n, hole);
    let input = dir.join("in.png");
    let mpath = dir.join("mask.pgm");
    save_image(&img, &input).unwrap();
    save_image(&mask_image(&mask), &mpath).unwrap();
    (input, mpath)
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("inpaint").output().unwrap().status.code(), Some(1));
    let out = bin()
        .args(["interpolate", "--input", "x.png", "--factor", "5", "--output", "y.png"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn laplace_only_writes_fill_and_single_row_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (input, mask) = write_problem(dir.path(), 24, 6);
    let out = dir.path().join("out.pgm");
    let trace = dir.path().join("t.csv");
    let status = bin()
        .args(["inpaint", "--method", "laplace-only", "--log-every", "0"])
        .arg("--input")
        .arg(&input)
        .arg("--mask")
        .arg(&mask)
        .arg("--output")
        .arg(&out)
        .arg("--trace")
        .arg(&trace)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(read_trace(&trace).unwrap().records.len(), 1);
    let (_, _, a) = read_intensities(&input).unwrap();
    let (_, _, b) = read_intensities(&out).unwrap();
    let m = inpaint_core::io::load_mask(&mask).unwrap();
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        if !m.get(k / 24, k % 24) {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = write_problem(dir.path(), 16, 4);
    let border = dir.path().join("border.png");
    save_image(&mask_image(&Mask::from_fn(16, 16, |i, j| i == 1 && j == 8)), &border).unwrap();
    let out = dir.path().join("o.png");
    let code = |mask: &Path, input: &Path| {
        bin()
            .args(["inpaint", "--log-every", "0"])
            .arg("--input")
            .arg(input)
            .arg("--mask")
            .arg(mask)
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(code(&border, &input), Some(3));
    assert_eq!(code(&border, &dir.path().join("missing.png")), Some(2));
    let empty = dir.path().join("empty.png");
    save_image(&GrayImage::filled(16, 16, 0.0), &empty).unwrap();
    assert_eq!(code(&empty, &input), Some(3));
}

#[test]
fn non_convergence_still_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let (input, mask) = write_problem(dir.path(), 24, 6);
    let out = dir.path().join("o.png");
    let status = bin()
        .args(["inpaint", "--method", "el", "--max-iters", "3", "--log-every", "0"])
        .arg("--input")
        .arg(&input)
        .arg("--mask")
        .arg(&mask)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    assert_eq!(load_image(&out).unwrap().shape(), (24, 24));
}

#[test]
fn interpolate_doubles_size_and_keeps_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.pgm");
    save_image(&fixtures::checker(8, 2), &input).unwrap();
    let out = dir.path().join("big.png");
    let status = bin()
        .args(["interpolate", "--factor", "2", "--log-every", "0"])
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let (h, w, small) = read_intensities(&input).unwrap();
    let (hh, ww, big) = read_intensities(&out).unwrap();
    assert_eq!((hh, ww), (2 * h, 2 * w));
    for i in 0..h {
        for j in 0..w {
            assert_eq!(big[2 * i * ww + 2 * j], small[i * w + j]);
        }
    }
}
