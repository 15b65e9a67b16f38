use rankone::datagen::{generate, load_csv, read_csv, save_instance, split, write_csv, GenSpec, OutlierClass, Sidecar};

fn spec(class: OutlierClass, n: usize) -> GenSpec {
    GenSpec { outlier_class: class, n, p: 3, sigma: 0.4, seed: 11 }
}

#[test]
fn saved_instance_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for class in [OutlierClass::None, OutlierClass::Clustered, OutlierClass::Spread] {
        let inst = generate(&spec(class, 40)).unwrap();
        let stem = format!("{class:?}").to_lowercase();
        let (csv, json) = save_instance(&inst, dir.path(), &stem).unwrap();
        assert_eq!(load_csv(&csv).unwrap(), inst.dataset);
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(side.spec, spec(class, 40));
        assert_eq!(side.direction, inst.direction);
        assert_eq!(side.bayes_w[0], 0.0);
    }
}

#[test]
fn csv_schema() {
    let inst = generate(&spec(OutlierClass::None, 5)).unwrap();
    let mut buf = Vec::new();
    write_csv(&inst.dataset, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,f1,f2,f3"));
    for l in lines {
        let label = l.split(',').next().unwrap();
        assert!(label == "1" || label == "-1", "{l}");
        assert_eq!(l.split(',').count(), 4);
    }
    // 0 is read as −1; anything else is rejected.
    let ds = read_csv("label,f1\n0,2.5\n1,-1\n".as_bytes()).unwrap();
    assert_eq!(ds.labels, vec![-1.0, 1.0]);
    assert!(read_csv("label,f1\n2,2.5\n".as_bytes()).is_err());
    assert!(read_csv("y,f1\n1,2.5\n".as_bytes()).is_err());
    assert!(read_csv("label,f1\n1,abc\n".as_bytes()).is_err());
}

#[test]
fn split_partitions_rows() {
    let inst = generate(&spec(OutlierClass::Spread, 100)).unwrap();
    let [a, b, c] = split(&inst.dataset, (0.35, 0.35, 0.30), 3).unwrap();
    assert_eq!((a.n(), b.n(), c.n()), (35, 35, 30));
    let mut rows: Vec<String> =
        [&a, &b, &c].iter().flat_map(|d| (0..d.n()).map(|i| format!("{:?}", d.augmented(i)))).collect();
    let mut orig: Vec<String> = (0..100).map(|i| format!("{:?}", inst.dataset.augmented(i))).collect();
    rows.sort();
    orig.sort();
    assert_eq!(rows, orig);
    assert_eq!(split(&inst.dataset, (0.35, 0.35, 0.30), 3).unwrap()[0], a);
}
