//! Synthetic inputs shared by the CLI tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dwm::io;
use dwm::{DepthMap, Frame};

pub fn dwm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Box over a tilted plane; the box drifts right over time.
pub fn box_scene_depth(h: usize, w: usize, t: usize) -> DepthMap {
    let (r0, r1) = (h / 3, 2 * h / 3);
    let (c0, c1) = (w / 3 + t, 2 * w / 3 + t);
    let values = (0..h * w)
        .map(|k| {
            let (i, j) = (k / w, k % w);
            if (r0..r1).contains(&i) && (c0..c1).contains(&j) {
                3.0
            } else {
                6.0 + 0.01 * i as f64
            }
        })
        .collect();
    DepthMap::new(w, h, values).unwrap()
}

pub fn gradient_frame(h: usize, w: usize, t: usize) -> Frame {
    Frame::from_fn(w, h, |i, j| [(j * 255 / w.max(2)) as u8, (i * 255 / h.max(2)) as u8, (t * 17 % 256) as u8])
}

/// Writes `frames/frame_%05d.png` and `depths/depth_%05d.pfm`.
pub fn write_inputs(root: &Path, n: usize, h: usize, w: usize) -> (PathBuf, PathBuf) {
    let (fd, dd) = (root.join("frames"), root.join("depths"));
    std::fs::create_dir_all(&fd).unwrap();
    std::fs::create_dir_all(&dd).unwrap();
    for t in 0..n {
        io::write_frame(&gradient_frame(h, w, t), &fd.join(io::sequence_name("frame", t, "png"))).unwrap();
        io::write_pfm(&box_scene_depth(h, w, t), &dd.join(io::sequence_name("depth", t, "pfm"))).unwrap();
    }
    (fd, dd)
}

/// One static track at the frame center plus a drifting one.
pub fn write_tracks(path: &Path, n: usize, h: usize, w: usize) {
    let mut lines = String::new();
    for t in 0..n {
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        lines += &format!("{{\"id\":0,\"frame\":{t},\"x\":{cx},\"y\":{cy},\"visible\":true}}\n");
        let x = (4 + t) as f64;
        lines += &format!("{{\"id\":1,\"frame\":{t},\"x\":{x},\"y\":5.0,\"visible\":{}}}\n", t % 3 != 2);
    }
    std::fs::write(path, lines).unwrap();
}

/// Geometry-only binary PLY.
pub fn write_soup(path: &Path, vertices: &[[f32; 3]], faces: &[[u32; 3]]) {
    let mut b = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        vertices.len(),
        faces.len()
    )
    .into_bytes();
    for v in vertices.iter().flatten() {
        b.extend_from_slice(&v.to_le_bytes());
    }
    for f in faces {
        b.push(3);
        for &k in f {
            b.extend_from_slice(&(k as i32).to_le_bytes());
        }
    }
    std::fs::write(path, b).unwrap();
}

/// Every file under `dir` (non-recursive) by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}
