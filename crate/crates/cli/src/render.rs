//! Colour-mapped PNG previews of risk maps.

use poachgrid_core::RasterDataset;

/// Colour of ramp step `i` of 256: blue to yellow to red.
pub fn ramp(i: u8) -> [u8; 3] {
    let i = i as u32;
    if i < 128 {
        // blue (0,0,255) -> yellow (255,255,0) over steps 0..=127
        let s = i * 255 / 127;
        [s as u8, s as u8, (255 - s) as u8]
    } else {
        // yellow -> red (255,0,0) over steps 128..=255
        let s = (i - 128) * 255 / 127;
        [255, (255 - s) as u8, 0]
    }
}

/// Ramp step of a value in [0, 1]; values outside are clamped.
pub fn step(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// RGBA PNG; invalid cells are fully transparent.
pub fn risk_png(raster: &RasterDataset) -> Vec<u8> {
    let mut pixels = Vec::with_capacity(raster.values.len() * 4);
    for &v in &raster.values {
        if raster.is_valid(v) {
            let [r, g, b] = ramp(step(v));
            pixels.extend_from_slice(&[r, g, b, 255]);
        } else {
            pixels.extend_from_slice(&[0, 0, 0, 0]);
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(&pixels).expect("in-memory PNG data");
    }
    out
}
