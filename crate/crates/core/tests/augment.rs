use onhkit_core::augment::{apply_affine, random_patch, sample_augment, AffineParams, AugmentSpec};
use onhkit_core::synth::{generate_one, SynthSpec};
use onhkit_core::Raster;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interior_mae(a: &Raster, b: &Raster) -> f64 {
    let (w, h, c) = (a.width(), a.height(), a.channels());
    let mut total = 0.0;
    let mut n = 0usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            for ch in 0..c {
                total += (f64::from(a.get(x, y, ch)) - f64::from(b.get(x, y, ch))).abs();
                n += 1;
            }
        }
    }
    total / n as f64
}

#[test]
fn rotation_round_trip_is_close() {
    let spec = SynthSpec {
        noise_sigma: 0.0,
        ..SynthSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..10 {
        let (img, _) = generate_one(&spec, i).unwrap();
        let theta = rng.random_range(-10.0..10.0);
        let fwd = AffineParams {
            angle_deg: theta,
            ..AffineParams::default()
        };
        let back = AffineParams {
            angle_deg: -theta,
            ..AffineParams::default()
        };
        let out = apply_affine(&apply_affine(&img, &fwd), &back);
        let mae = interior_mae(&img, &out);
        assert!(mae <= 2.0, "theta {theta}: mae {mae}");
    }
}

#[test]
fn double_flip_is_exact_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = Raster::from_fn(17, 9, 3, |_, _, _| rng.random()).unwrap();
    let flip = AffineParams {
        flip: true,
        ..AffineParams::default()
    };
    let once = apply_affine(&img, &flip);
    assert_ne!(once, img);
    assert_eq!(apply_affine(&once, &flip), img);
}

#[test]
fn sampled_parameters_stay_in_range() {
    let spec = AugmentSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut angle_sum = 0.0;
    for _ in 0..10_000 {
        let p = sample_augment(&spec, &mut rng);
        assert!((-10.0..=10.0).contains(&p.angle_deg));
        assert!((-0.2..=0.2).contains(&p.shear));
        assert!((0.0..=0.1).contains(&p.zoom_frac));
        assert!(p.shift_x.abs() <= 0.1 && p.shift_y.abs() <= 0.1);
        angle_sum += p.angle_deg;
    }
    assert!((angle_sum / 10_000.0).abs() < 0.5);
}

#[test]
fn patch_offsets_cover_the_valid_range() {
    // 22 = round(20 * 1.1), so no resize happens and each pixel encodes its position.
    let img = Raster::from_fn(22, 22, 3, |x, y, c| [x as u8, y as u8, 0][c]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seen = [[false; 3]; 3];
    for _ in 0..10_000 {
        let p = random_patch(&img, 20, 0.1, &mut rng).unwrap();
        assert_eq!((p.width(), p.height()), (20, 20));
        seen[p.get(0, 0, 1) as usize][p.get(0, 0, 0) as usize] = true;
    }
    assert!(seen.iter().flatten().all(|&s| s));
}

#[test]
fn same_seed_same_stream() {
    let spec = AugmentSpec::default();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..20).map(|_| sample_augment(&spec, &mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
}
