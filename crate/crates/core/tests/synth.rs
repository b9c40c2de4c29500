use quakeseg::features::glcm_features;
use quakeseg::synth::{generate_scene, SceneSpec, CLASS_DAMAGED, CLASS_INTACT};

#[test]
fn same_seed_same_scene() {
    let a = generate_scene(&SceneSpec::acceptance(3)).unwrap();
    let b = generate_scene(&SceneSpec::acceptance(3)).unwrap();
    assert_eq!(a.raster, b.raster);
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.classes, b.classes);
    let c = generate_scene(&SceneSpec::acceptance(4)).unwrap();
    assert_ne!(a.raster, c.raster);
}

#[test]
fn flat_noise_free_region_equals_its_mean() {
    let spec = SceneSpec::parse(
        "width = 6\nheight = 4\nbands = 2\n\
         region = 0 0 4 3 class=0 spectrum=0.25,0.5 texture=flat noise=0\n\
         region = 0 3 4 3 class=1 spectrum=0.75,0.125 texture=speckle:0.2 noise=0.01\n",
    )
    .unwrap();
    let scene = generate_scene(&spec).unwrap();
    for r in 0..4 {
        for c in 0..3 {
            assert_eq!(scene.raster.get(0, r, c), 0.25);
            assert_eq!(scene.raster.get(1, r, c), 0.5);
        }
    }
    assert_eq!(scene.classes, vec![0, 1]);
}

#[test]
fn damaged_buildings_have_more_texture_contrast() {
    let scene = generate_scene(&SceneSpec::acceptance(42)).unwrap();
    let nir = scene.raster.band_grid(3).unwrap();
    let mean_contrast = |class| {
        let ids: Vec<u32> = (0..scene.classes.len() as u32).filter(|&i| scene.classes[i as usize] == class).collect();
        ids.iter().map(|&i| glcm_features(&nir, &scene.truth, i, 32).unwrap().contrast).sum::<f64>() / ids.len() as f64
    };
    assert!(mean_contrast(CLASS_DAMAGED) > mean_contrast(CLASS_INTACT));
}

#[test]
fn overlapping_or_partial_layouts_are_rejected() {
    let overlap = "width = 4\nheight = 2\nbands = 1\n\
                   region = 0 0 2 3 class=0 spectrum=0.5 texture=flat noise=0\n\
                   region = 0 2 2 2 class=0 spectrum=0.5 texture=flat noise=0\n";
    let gap = "width = 4\nheight = 2\nbands = 1\nregion = 0 0 2 3 class=0 spectrum=0.5 texture=flat noise=0\n";
    for text in [overlap, gap] {
        let err = SceneSpec::parse(text).and_then(|s| generate_scene(&s).map(|_| ())).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
