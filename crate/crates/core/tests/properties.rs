//! Property tests for the library invariants.

use proptest::collection::vec;
use proptest::prelude::*;

use spmd_core::cluster::{cluster_pixel, ClusterParams, MotionlessSeries, Sample};
use spmd_core::decide::decide_pixel;
use spmd_core::illumination::hellinger_distance;
use spmd_core::imaging::{equalize, gaussian_blur, histogram, to_gray, to_hsv_value_channel};
use spmd_core::{ColorFrame, GrayFrame, Histogram256};

fn histogram_strategy() -> impl Strategy<Value = Histogram256> {
    vec((0u8..=255, 1u64..500), 1..40).prop_map(|pairs| {
        let mut bins = [0u64; 256];
        for (v, c) in pairs {
            bins[v as usize] += c;
        }
        Histogram256::from_bins(bins)
    })
}

fn gray_frame_strategy(max_side: usize) -> impl Strategy<Value = GrayFrame> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        vec(0u8..=255, w * h).prop_map(move |px| GrayFrame::new(w, h, px).unwrap())
    })
}

fn color_frame_strategy(max_side: usize) -> impl Strategy<Value = ColorFrame> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        vec([0u8..=255, 0u8..=255, 0u8..=255], w * h)
            .prop_map(move |px| ColorFrame::new(w, h, px).unwrap())
    })
}

proptest! {
    #[test]
    fn hellinger_symmetric_and_bounded(h1 in histogram_strategy(), h2 in histogram_strategy()) {
        let ab = hellinger_distance(&h1, &h2).unwrap();
        let ba = hellinger_distance(&h2, &h1).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn hellinger_scale_invariant(h1 in histogram_strategy(), h2 in histogram_strategy(), k in 1u64..50) {
        let base = hellinger_distance(&h1, &h2).unwrap();
        let scaled = hellinger_distance(&h1.scaled(k), &h2).unwrap();
        prop_assert!((base - scaled).abs() < 1e-9);
    }

    #[test]
    fn histogram_total_is_pixel_count(frame in gray_frame_strategy(24)) {
        prop_assert_eq!(histogram(&frame).total() as usize, frame.pixels().len());
    }

    #[test]
    fn equalize_preserves_intensity_order(frame in gray_frame_strategy(16)) {
        let eq = equalize(&frame);
        let mut seen = [None::<u8>; 256];
        for (inp, out) in frame.pixels().iter().zip(eq.pixels()) {
            // Equal inputs map to equal outputs.
            match seen[*inp as usize] {
                None => seen[*inp as usize] = Some(*out),
                Some(prev) => prop_assert_eq!(prev, *out),
            }
        }
        let mapped: Vec<(u8, u8)> = seen
            .iter()
            .enumerate()
            .filter_map(|(v, out)| out.map(|o| (v as u8, o)))
            .collect();
        for pair in mapped.windows(2) {
            prop_assert!(pair[0].1 <= pair[1].1);
        }
    }

    #[test]
    fn blur_stays_within_input_range(frame in gray_frame_strategy(16), sigma in 0.3f64..4.0, radius in 1usize..4) {
        let blurred = gaussian_blur(&frame, sigma, radius).unwrap();
        let lo = *frame.pixels().iter().min().unwrap() as f32;
        let hi = *frame.pixels().iter().max().unwrap() as f32;
        for &v in blurred.pixels() {
            prop_assert!(v >= lo - 1e-3 && v <= hi + 1e-3);
        }
    }

    #[test]
    fn gray_and_value_channels_stay_in_range(frame in color_frame_strategy(12)) {
        // Outputs are u8 by construction; the interesting property is that
        // gray never exceeds the value channel (a weighted mean vs the max).
        let gray = to_gray(&frame);
        let value = to_hsv_value_channel(&frame);
        for (g, v) in gray.pixels().iter().zip(value.pixels()) {
            prop_assert!(g <= v);
        }
    }

    #[test]
    fn clustering_is_insensitive_to_input_order(
        values in vec(0u8..=255, 1..60),
        epsilon in 2u8..30,
        min_pts in 2usize..8,
        shuffle_seed in 0u64..1000,
    ) {
        let params = ClusterParams { epsilon, min_pts };
        let mut a = MotionlessSeries {
            position: (0, 0),
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &gray)| Sample { frame_index: i as u32, gray, color: [gray; 3] })
                .collect(),
        };
        let mut b = a.clone();
        // Cheap deterministic shuffle.
        let mut state = shuffle_seed.wrapping_add(1);
        for i in (1..b.samples.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            b.samples.swap(i, (state >> 33) as usize % (i + 1));
        }
        a.sort();
        b.sort();
        prop_assert_eq!(cluster_pixel(&a, &params).unwrap(), cluster_pixel(&b, &params).unwrap());
    }

    #[test]
    fn cluster_counts_and_intervals_are_consistent(
        values in vec(0u8..=255, 1..80),
        epsilon in 1u8..40,
        min_pts in 2usize..9,
    ) {
        let mut series = MotionlessSeries {
            position: (0, 0),
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &gray)| Sample { frame_index: i as u32, gray, color: [0; 3] })
                .collect(),
        };
        series.sort();
        let set = cluster_pixel(&series, &ClusterParams { epsilon, min_pts }).unwrap();
        let mut consumed = 0usize;
        let mut prev_end = -1i32;
        for c in &set.clusters {
            prop_assert!(c.interval.0 as i32 > prev_end);
            prop_assert!(c.interval.0 <= c.interval.1);
            prop_assert!(c.candidate >= c.interval.0 && c.candidate <= c.interval.1);
            prop_assert_eq!(c.count, c.member_frames.len());
            consumed += c.count;
            prev_end = c.interval.1 as i32;
        }
        prop_assert!(consumed <= values.len());
    }

    #[test]
    fn decision_is_scale_invariant_in_mass(
        candidates in vec((0u8..=255, 1usize..500), 1..6),
        reference in 0u8..=255,
        factor in 1usize..20,
    ) {
        use spmd_core::cluster::{GrayCluster, PixelClusterSet};
        let mk = |scale: usize| PixelClusterSet {
            position: (0, 0),
            clusters: candidates
                .iter()
                .map(|&(candidate, count)| GrayCluster {
                    interval: (candidate, candidate),
                    candidate,
                    count: count * scale,
                    member_frames: vec![],
                })
                .collect(),
        };
        let base = decide_pixel(&mk(1), reference).map(|(_, g)| g);
        let scaled = decide_pixel(&mk(factor), reference).map(|(_, g)| g);
        prop_assert_eq!(base, scaled);
    }
}
