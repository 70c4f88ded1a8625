//! Placeholder screen image served in place of a real screencap.

/// Renders a PNG of the given size: a status bar, a navigation bar and a
/// content area tinted by the foreground package.
pub fn placeholder_png(width: u32, height: u32, usable: (u32, u32, u32, u32), foreground: Option<&str>) -> Vec<u8> {
    let (ux, uy, uw, uh) = usable;
    let tint = foreground
        .map(|p| p.bytes().fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b))))
        .unwrap_or(0x00_60_60_60);
    let content = [(tint >> 16) as u8 | 0x40, (tint >> 8) as u8 | 0x40, tint as u8 | 0x40];
    let bar = [0x20u8, 0x20, 0x20];

    let mut data = Vec::with_capacity((width * height * 3) as usize);
    for y in 0..height {
        for x in 0..width {
            let inside = x >= ux && x < ux + uw && y >= uy && y < uy + uh;
            data.extend_from_slice(if inside { &content } else { &bar });
        }
    }

    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Fast);
        let mut writer = encoder.write_header().expect("in-memory png header");
        writer.write_image_data(&data).expect("in-memory png data");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_png_signature() {
        let png = placeholder_png(36, 74, (0, 4, 36, 66), Some("com.brave.browser"));
        assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    }
}
