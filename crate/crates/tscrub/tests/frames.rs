use tscrub::frames::{render_frames, FrameEntry};
use tscrub_core::windows::split_windows;
use tscrub_core::{AnnotatedPoint, CleanResult, Instant, Mechanism};

fn result() -> CleanResult {
    let mut data: Vec<AnnotatedPoint> = (0..30)
        .map(|i| AnnotatedPoint::observed(Instant(1_600_000_000 + i * 3600), (i % 7) as f64))
        .collect();
    data[3].missing_type = Some(Mechanism::Mcar);
    data[3].method_used = Some("na_locf".into());
    for i in [12, 15] {
        data[i].is_outlier = true;
        data[i].orig_value = Some(99.0);
        data[i].method_used = Some("na_kalman".into());
    }
    CleanResult {
        clean_data: data,
        missing_ts: vec![],
        duplicate_ts: vec![],
        imp_methods: vec![],
        mcar_err: None,
        mar_err: None,
        outliers: vec![],
        outlier_mcar_err: None,
        outlier_mar_err: None,
        change_log: vec![],
    }
}

#[test]
fn one_frame_per_window_with_index() {
    let r = result();
    let ws = split_windows(&r, "10".parse().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let index = render_frames(&ws, &r, dir.path()).unwrap();
    assert_eq!(index.len(), 3);
    for (k, e) in index.iter().enumerate() {
        assert_eq!(e.window, k);
        assert_eq!(e.file, format!("frame_{k:03}.svg"));
        let svg = std::fs::read_to_string(dir.path().join(&e.file)).unwrap();
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
    }
    let stored: Vec<FrameEntry> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(stored, index);

    let second = std::fs::read_to_string(dir.path().join("frame_001.svg")).unwrap();
    assert!(second.contains("outliers: 2"));
    assert_eq!(second.matches("class=\"outlier\"").count(), 2);
    let first = std::fs::read_to_string(dir.path().join("frame_000.svg")).unwrap();
    assert!(first.contains("missing imputed: 1"));
    assert_eq!(first.matches("class=\"imputed\"").count(), 1);
}

#[test]
fn reverted_points_break_the_line() {
    let mut r = result();
    r.clean_data[5].value = None;
    let ws = split_windows(&r, "30".parse().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    render_frames(&ws, &r, dir.path()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("frame_000.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}
