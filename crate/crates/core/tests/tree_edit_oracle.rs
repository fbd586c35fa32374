#[path = "support/forest_search.rs"]
mod forest_search;

#[test]
fn zhang_shasha_matches_exhaustive_search_on_small_trees() {
    let result = forest_search::compare_all_small_trees();
    assert_eq!(result.pairs, 471 * 471);
    assert!(result.mismatches.is_empty(), "{:#?}", &result.mismatches[..result.mismatches.len().min(10)]);
}
