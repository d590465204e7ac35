//! Scenario files shipped with the binary, addressed as `builtin:<name>`.

const BUILTINS: &[(&str, &str)] = &[
    ("bm-rotating-ovals", include_str!("../scenarios/bm-rotating-ovals.json")),
    ("check-product-block", include_str!("../scenarios/check-product-block.json")),
    ("check-product-random-blocks", include_str!("../scenarios/check-product-random-blocks.json")),
    ("check-product-subharmonic-pairs", include_str!("../scenarios/check-product-subharmonic-pairs.json")),
    ("example8-deficit", include_str!("../scenarios/example8-deficit.json")),
    ("example8-flat", include_str!("../scenarios/example8-flat.json")),
    ("example8-golden", include_str!("../scenarios/example8-golden.json")),
    ("interp-disk-constant", include_str!("../scenarios/interp-disk-constant.json")),
    ("interp-disk-cosine", include_str!("../scenarios/interp-disk-cosine.json")),
    ("interp-dual-cross-check", include_str!("../scenarios/interp-dual-cross-check.json")),
    ("interp-interval", include_str!("../scenarios/interp-interval.json")),
    ("interp-legendre", include_str!("../scenarios/interp-legendre.json")),
    ("min-principle-suite", include_str!("../scenarios/min-principle-suite.json")),
    ("prekopa-moving-gaussian", include_str!("../scenarios/prekopa-moving-gaussian.json")),
    ("prekopa-suite-pos", include_str!("../scenarios/prekopa-suite-pos.json")),
    ("prekopa-suite-trace", include_str!("../scenarios/prekopa-suite-trace.json")),
    ("supconv-kink", include_str!("../scenarios/supconv-kink.json")),
    ("supconv-quad8", include_str!("../scenarios/supconv-quad8.json")),
];

pub fn names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

pub fn get(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
