//! Camera metadata: EXIF extraction, fuzzy sensor-database lookup, field of
//! view and the photo-to-panorama scale factor.

use std::io::{Cursor, Read};
use std::path::Path;

use exif::{In, Tag, Value};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this name similarity a database match is not trusted.
pub const MIN_SIMILARITY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("image carries no EXIF block; supply the field of view explicitly")]
    MissingExif,
    #[error("EXIF has no usable FocalLength (tag 37386); supply the field of view explicitly")]
    MissingFocalLength,
    #[error("cannot decode image: {0}")]
    InvalidImage(String),
    #[error("best camera match {name:?} has similarity {similarity:.3} < {MIN_SIMILARITY}; supply the field of view explicitly")]
    LowConfidence { name: String, similarity: f64 },
    #[error("sensor database is empty")]
    EmptyDatabase,
    #[error("sensor database: {0}")]
    SensorDb(String),
    #[error("{0} must be positive")]
    NonPositiveInput(&'static str),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoMeta {
    /// Millimeters.
    pub focal_length: f64,
    pub make: String,
    pub model: String,
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub make: String,
    pub model: String,
    /// Millimeters.
    #[serde(rename = "sensor_width_mm")]
    pub sensor_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraMatch {
    pub spec: CameraSpec,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovScale {
    /// Radians.
    pub fov: f64,
    pub scale_factor: f64,
}

impl FovScale {
    pub fn new(fov: f64, photo_width: usize, pano_width: usize) -> Result<Self, MetadataError> {
        Ok(Self {
            fov,
            scale_factor: compute_scale_factor(fov, photo_width, pano_width)?,
        })
    }
}

fn ascii_field(exif: &exif::Exif, tag: Tag) -> String {
    match exif.get_field(tag, In::PRIMARY).map(|f| &f.value) {
        Some(Value::Ascii(parts)) => parts
            .iter()
            .map(|p| String::from_utf8_lossy(p).trim_matches(char::from(0)).trim().to_string())
            .collect::<Vec<_>>()
            .join(" "),
        _ => String::new(),
    }
}

/// Reads focal length, make and model from EXIF; pixel dimensions come from
/// the image itself.
pub fn parse_photo_meta(bytes: &[u8]) -> Result<PhotoMeta, MetadataError> {
    let (width_px, height_px) = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| MetadataError::InvalidImage(e.to_string()))?
        .into_dimensions()
        .map_err(|e| MetadataError::InvalidImage(e.to_string()))?;
    if width_px == 0 || height_px == 0 {
        return Err(MetadataError::InvalidImage("zero-sized image".into()));
    }
    let exif = exif::Reader::new()
        .read_from_container(&mut Cursor::new(bytes))
        .map_err(|_| MetadataError::MissingExif)?;
    let focal_length = match exif.get_field(Tag::FocalLength, In::PRIMARY).map(|f| &f.value) {
        Some(Value::Rational(v)) if !v.is_empty() => v[0].to_f64(),
        Some(Value::SRational(v)) if !v.is_empty() => v[0].to_f64(),
        _ => return Err(MetadataError::MissingFocalLength),
    };
    if !(focal_length > 0.0 && focal_length.is_finite()) {
        return Err(MetadataError::MissingFocalLength);
    }
    Ok(PhotoMeta {
        focal_length,
        make: ascii_field(&exif, Tag::Make),
        model: ascii_field(&exif, Tag::Model),
        width_px,
        height_px,
    })
}

/// Reads a photo file and parses its metadata.
pub fn read_photo_meta(path: impl AsRef<Path>) -> Result<PhotoMeta, MetadataError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_photo_meta(&bytes)
}

/// Canonical "make model" string used for database lookup.
pub fn normalize_camera_name(make: &str, model: &str) -> String {
    let mut make = make.to_lowercase();
    let mut model = model.to_lowercase();
    if make.contains("nikon") {
        make = "nikon".into();
    } else if make.contains("olympus") {
        make = "olympus".into();
    }
    let make = make.split_whitespace().collect::<Vec<_>>().join(" ");
    if !make.is_empty() {
        model = model.replace(&make, " ");
    }
    make.split_whitespace()
        .chain(model.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ")
}

fn common_chars(a: &[char], b: &[char]) -> usize {
    let (mut best, mut pa, mut pb) = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > best {
                (best, pa, pb) = (k, i, j);
            }
        }
    }
    if best == 0 {
        return 0;
    }
    best + common_chars(&a[..pa], &b[..pb]) + common_chars(&a[pa + best..], &b[pb + best..])
}

/// Recursive longest-common-substring similarity, `2m/(|a|+|b|)`.
///
/// The split point is the first longest common substring, which makes the
/// count depend on argument order when several candidates tie; both orders
/// are evaluated and the larger count kept.
pub fn text_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let m = common_chars(&a, &b).max(common_chars(&b, &a));
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

/// Picks the database row whose normalized name is most similar to the
/// photo's. Ties go to the earliest row.
pub fn match_camera(meta: &PhotoMeta, db: &[CameraSpec]) -> Result<CameraMatch, MetadataError> {
    let target = normalize_camera_name(&meta.make, &meta.model);
    let mut best: Option<(usize, f64)> = None;
    for (i, spec) in db.iter().enumerate() {
        let s = text_similarity(&target, &normalize_camera_name(&spec.make, &spec.model));
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (i, similarity) = best.ok_or(MetadataError::EmptyDatabase)?;
    if similarity < MIN_SIMILARITY {
        return Err(MetadataError::LowConfidence {
            name: format!("{} {}", db[i].make, db[i].model),
            similarity,
        });
    }
    Ok(CameraMatch {
        spec: db[i].clone(),
        similarity,
    })
}

/// Horizontal field of view in radians, `2·atan(s/2l)`.
pub fn estimate_fov(focal_length: f64, sensor_width: f64) -> Result<f64, MetadataError> {
    if focal_length.is_nan() || focal_length <= 0.0 {
        return Err(MetadataError::NonPositiveInput("focal length"));
    }
    if sensor_width.is_nan() || sensor_width <= 0.0 {
        return Err(MetadataError::NonPositiveInput("sensor width"));
    }
    Ok(2.0 * (sensor_width / (2.0 * focal_length)).atan())
}

/// Factor that makes one photo pixel span the same angle as one panorama
/// pixel, `FOV·w_r/(2π·w_p)`.
pub fn compute_scale_factor(
    fov: f64,
    photo_width: usize,
    pano_width: usize,
) -> Result<f64, MetadataError> {
    if fov.is_nan() || fov <= 0.0 {
        return Err(MetadataError::NonPositiveInput("field of view"));
    }
    if photo_width == 0 {
        return Err(MetadataError::NonPositiveInput("photo width"));
    }
    if pano_width == 0 {
        return Err(MetadataError::NonPositiveInput("panorama width"));
    }
    Ok(fov * pano_width as f64 / (2.0 * std::f64::consts::PI * photo_width as f64))
}

/// Parses a `make,model,sensor_width_mm` CSV with a header row.
pub fn parse_sensor_db(reader: impl Read) -> Result<Vec<CameraSpec>, MetadataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CameraSpec>().enumerate() {
        let spec = row.map_err(|e| MetadataError::SensorDb(e.to_string()))?;
        if !(spec.sensor_width > 0.0 && spec.sensor_width.is_finite()) {
            return Err(MetadataError::SensorDb(format!(
                "row {}: sensor width must be positive",
                i + 2
            )));
        }
        out.push(spec);
    }
    Ok(out)
}

pub fn load_sensor_db(path: impl AsRef<Path>) -> Result<Vec<CameraSpec>, MetadataError> {
    parse_sensor_db(std::fs::File::open(path)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ifd_entry(out: &mut Vec<u8>, tag: u16, kind: u16, count: u32, value: u32) {
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&kind.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&value.to_le_bytes());
    }

    /// Little-endian TIFF block with Make, Model and optionally FocalLength.
    fn tiff_block(make: &str, model: &str, focal: Option<(u32, u32)>) -> Vec<u8> {
        let make = format!("{make}\0");
        let model = format!("{model}\0");
        // header 8 | IFD0: 2 + 3*12 + 4 = 42 | exif IFD: 2 + 12 + 4 = 18 | data
        let ifd0 = 8u32;
        let exif_ifd = ifd0 + 42;
        let data = exif_ifd + 18;
        let make_off = data;
        let model_off = make_off + make.len() as u32;
        let focal_off = model_off + model.len() as u32;

        let mut t = b"II*\0".to_vec();
        t.extend_from_slice(&ifd0.to_le_bytes());
        t.extend_from_slice(&3u16.to_le_bytes());
        ifd_entry(&mut t, 271, 2, make.len() as u32, make_off);
        ifd_entry(&mut t, 272, 2, model.len() as u32, model_off);
        ifd_entry(&mut t, 34665, 4, 1, exif_ifd);
        t.extend_from_slice(&0u32.to_le_bytes());
        match focal {
            Some(_) => {
                t.extend_from_slice(&1u16.to_le_bytes());
                ifd_entry(&mut t, 37386, 5, 1, focal_off);
            }
            None => {
                t.extend_from_slice(&1u16.to_le_bytes());
                // ExposureTime stands in so the sub-IFD is not empty
                ifd_entry(&mut t, 33434, 5, 1, focal_off);
            }
        }
        t.extend_from_slice(&0u32.to_le_bytes());
        t.extend_from_slice(make.as_bytes());
        t.extend_from_slice(model.as_bytes());
        let (n, d) = focal.unwrap_or((1, 250));
        t.extend_from_slice(&n.to_le_bytes());
        t.extend_from_slice(&d.to_le_bytes());
        t
    }

    fn plain_jpeg(w: u32, h: u32) -> Vec<u8> {
        let img = image::RgbImage::from_pixel(w, h, image::Rgb([120, 140, 200]));
        let mut buf = Vec::new();
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut Cursor::new(&mut buf), image::ImageFormat::Jpeg)
            .unwrap();
        buf
    }

    /// JPEG of the given size with an EXIF APP1 segment right after SOI.
    pub(crate) fn jpeg_with_exif(w: u32, h: u32, make: &str, model: &str, focal: Option<(u32, u32)>) -> Vec<u8> {
        let jpeg = plain_jpeg(w, h);
        let tiff = tiff_block(make, model, focal);
        let mut app1 = b"Exif\0\0".to_vec();
        app1.extend_from_slice(&tiff);
        let mut out = jpeg[..2].to_vec();
        out.extend_from_slice(&[0xFF, 0xE1]);
        out.extend_from_slice(&((app1.len() + 2) as u16).to_be_bytes());
        out.extend_from_slice(&app1);
        out.extend_from_slice(&jpeg[2..]);
        out
    }

    #[test]
    fn parses_nikon_exif() {
        let bytes = jpeg_with_exif(64, 48, "NIKON", "E5600", Some((5, 1)));
        let meta = parse_photo_meta(&bytes).unwrap();
        assert_eq!(
            meta,
            PhotoMeta {
                focal_length: 5.0,
                make: "NIKON".into(),
                model: "E5600".into(),
                width_px: 64,
                height_px: 48,
            }
        );
    }

    #[test]
    fn missing_exif_and_focal_length() {
        assert!(matches!(parse_photo_meta(&plain_jpeg(8, 8)), Err(MetadataError::MissingExif)));
        let bytes = jpeg_with_exif(8, 8, "Canon", "X", None);
        assert!(matches!(parse_photo_meta(&bytes), Err(MetadataError::MissingFocalLength)));
        assert!(matches!(parse_photo_meta(b"nope"), Err(MetadataError::InvalidImage(_))));
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(
            normalize_camera_name("Canon", "Canon PowerShot SX100 IS"),
            "canon powershot sx100 is"
        );
        assert_eq!(normalize_camera_name("OLYMPUS IMAGING CORP.", "SP560UZ"), "olympus sp560uz");
        assert_eq!(normalize_camera_name("NIKON CORPORATION", "NIKON D90"), "nikon d90");
        assert_eq!(normalize_camera_name("", ""), "");
    }

    /// Brute-force reference: enumerate every common substring, take the
    /// first longest by (i, j) order, then recurse.
    fn reference_common(a: &[char], b: &[char]) -> usize {
        let mut best = (0, 0, 0);
        for i in 0..a.len() {
            for j in 0..b.len() {
                for len in (1..=(a.len() - i).min(b.len() - j)).rev() {
                    if a[i..i + len] == b[j..j + len] {
                        if len > best.0 {
                            best = (len, i, j);
                        }
                        break;
                    }
                }
            }
        }
        let (len, i, j) = best;
        if len == 0 {
            0
        } else {
            len + reference_common(&a[..i], &b[..j]) + reference_common(&a[i + len..], &b[j + len..])
        }
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(text_similarity("abc", "abc"), 1.0);
        assert_eq!(text_similarity("abc", "xyz"), 0.0);
        assert_eq!(text_similarity("", ""), 1.0);
        assert_eq!(text_similarity("", "abc"), 0.0);
        let s = text_similarity("canon powershot sx100 is", "canon powershot sx110 is");
        assert!(s >= 0.9, "{s}");
        // "canon powershot sx1" + "0 is" = 23 of 24 characters each side
        assert!((s - 46.0 / 48.0).abs() < 1e-12);
        // PHP similar_text("World", "Word") = 4
        assert!((text_similarity("World", "Word") - 8.0 / 9.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn similarity_matches_reference(a in "[a-e ]{0,12}", b in "[a-e ]{0,12}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            prop_assert_eq!(common_chars(&ac, &bc), reference_common(&ac, &bc));
        }

        #[test]
        fn similarity_is_symmetric_and_bounded(a in "[a-z0-9 ]{0,20}", b in "[a-z0-9 ]{0,20}") {
            let s = text_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - text_similarity(&b, &a)).abs() < 1e-12);
            prop_assert_eq!(text_similarity(&a, &a), 1.0);
        }

        #[test]
        fn normalization_is_idempotent(make in "[A-Za-z .]{0,12}", model in "[A-Za-z0-9 -]{0,16}") {
            let once = normalize_camera_name(&make, &model);
            prop_assert_eq!(normalize_camera_name("", &once), once.clone());
        }

        #[test]
        fn fov_is_monotone(l in 0.5f64..200.0, s in 0.1f64..50.0, ds in 0.01f64..10.0) {
            let f = estimate_fov(l, s).unwrap();
            prop_assert!(f > 0.0 && f < PI);
            prop_assert!(estimate_fov(l, s + ds).unwrap() > f);
            prop_assert!(estimate_fov(l + ds, s).unwrap() < f);
        }

        #[test]
        fn full_circle_scale_is_one(w in 1usize..100_000) {
            prop_assert!((compute_scale_factor(2.0 * PI, w, w).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    fn meta(make: &str, model: &str) -> PhotoMeta {
        PhotoMeta {
            focal_length: 5.0,
            make: make.into(),
            model: model.into(),
            width_px: 1,
            height_px: 1,
        }
    }

    fn spec(make: &str, model: &str, w: f64) -> CameraSpec {
        CameraSpec {
            make: make.into(),
            model: model.into(),
            sensor_width: w,
        }
    }

    #[test]
    fn matching_examples() {
        let db = vec![
            spec("Canon", "PowerShot G9", 7.44),
            spec("Sony", "Cybershot DSC W530", 6.17),
            spec("Nikon", "D90", 23.6),
        ];
        let m = match_camera(&meta("SONY", "DSC-W530"), &db).unwrap();
        assert_eq!(m.spec, db[1]);

        let m = match_camera(&meta("Nikon", "D90"), &db).unwrap();
        assert_eq!(m.spec, db[2]);
        assert_eq!(m.similarity, 1.0);

        let lone = vec![spec("zzz", "qqq", 1.0)];
        assert!(matches!(
            match_camera(&meta("NIKON", "E5600"), &lone),
            Err(MetadataError::LowConfidence { .. })
        ));
        assert!(matches!(match_camera(&meta("a", "b"), &[]), Err(MetadataError::EmptyDatabase)));
    }

    #[test]
    fn ties_go_to_the_first_row() {
        let a = spec("Acme", "X1", 1.0);
        let b = spec("Acme", "X1", 2.0);
        let m = match_camera(&meta("Acme", "X1"), &[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.spec, a);
        let m = match_camera(&meta("Acme", "X1"), &[b.clone(), a]).unwrap();
        assert_eq!(m.spec, b);
    }

    #[test]
    fn fov_examples() {
        assert_eq!(estimate_fov(5.0, 10.0).unwrap(), PI / 2.0);
        assert_eq!(estimate_fov(5.0, 6.17).unwrap(), 2.0 * 0.617f64.atan());
        assert!(estimate_fov(5.0, 1e-9).unwrap() < estimate_fov(5.0, 1e-6).unwrap());
        assert!(matches!(estimate_fov(0.0, 1.0), Err(MetadataError::NonPositiveInput(_))));
        assert!(matches!(estimate_fov(1.0, -1.0), Err(MetadataError::NonPositiveInput(_))));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(compute_scale_factor(PI / 2.0, 1800, 7200).unwrap(), 1.0);
        assert_eq!(compute_scale_factor(PI / 2.0, 3600, 7200).unwrap(), 0.5);
        assert!(matches!(compute_scale_factor(1.0, 0, 10), Err(MetadataError::NonPositiveInput(_))));
    }

    #[test]
    fn sensor_csv() {
        let text = "make,model,sensor_width_mm\nSony, Cybershot DSC W530 ,6.17\nNikon,Coolpix 5600,5.76\n";
        let db = parse_sensor_db(text.as_bytes()).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db[0], spec("Sony", "Cybershot DSC W530", 6.17));
        assert!(parse_sensor_db("make,model,sensor_width_mm\na,b,0\n".as_bytes()).is_err());
        assert!(parse_sensor_db("make,model,sensor_width_mm\na,b\n".as_bytes()).is_err());
    }
}
