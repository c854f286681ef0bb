mod common;

use breakwatch::learn::cross_validate;
use breakwatch::saliency::{centrality, feature_names, plan_interactions, saliency_dataset, saliency_trainer, score_page};
use breakwatch::segmentation::{leaf_blocks, SegmentConfig};
use breakwatch::synth::{bundled_saliency_model, saliency_corpus, site_a};

const TABLE: [&str; 31] = [
    "pct_layout_nodes_in_group",
    "total_class_attrs",
    "pct_layout_nodes_from_global",
    "mean_x_all_groups",
    "group_width",
    "has_id_attr",
    "pct_text_nodes",
    "total_functional_nodes_global",
    "pct_class_attrs",
    "total_layout_nodes_in_group",
    "center_x",
    "center_y",
    "total_layout_nodes_all_groups",
    "text_entropy",
    "class_entropy",
    "total_text_nodes_all_groups",
    "total_nodes_all_groups",
    "total_text_length",
    "mean_color_vibrancy",
    "total_nodes_in_group",
    "pct_functional_from_global",
    "total_functional_nodes_in_group",
    "total_text_nodes_in_group",
    "group_height",
    "pct_functional_nodes_in_group",
    "group_size",
    "centrality",
    "mean_font_size",
    "mean_y_all_groups",
    "pct_text_from_global",
    "mean_font_weight",
];

#[test]
fn thirty_one_named_features() {
    assert_eq!(feature_names(), TABLE.map(String::from).to_vec());
}

#[test]
fn centrality_anchor_points() {
    assert!((centrality(0.5, 0.5) - 1.0).abs() < 1e-9);
    assert!((centrality(0.0, 0.0) - (-5.0f64).exp()).abs() < 1e-9);
    assert!((centrality(1.0, 0.5) - (-2.5f64).exp()).abs() < 1e-9);
}

#[test]
fn classifier_separates_synthetic_blocks() {
    let d = saliency_dataset(&saliency_corpus(60, 3));
    let cv = cross_validate(&d, 5, &saliency_trainer(3)).unwrap();
    assert!(cv.mean_auc >= 0.9, "{}", cv.mean_auc);
}

#[test]
fn plans_target_interactive_nodes_and_are_seeded() {
    let s = site_a();
    let m = bundled_saliency_model();
    let (h, scored) = score_page(&s, &m, &SegmentConfig::default()).unwrap();
    assert_eq!(scored.len(), leaf_blocks(&h).len());
    let weighted: Vec<_> = leaf_blocks(&h)
        .into_iter()
        .map(|b| (b, scored.iter().find(|x| x.block == b.id).unwrap().probability))
        .collect();
    let p1 = plan_interactions(&s, &weighted, 7, 5);
    let p2 = plan_interactions(&s, &weighted, 7, 5);
    assert_eq!(p1, p2);
    assert!(!p1.is_empty() && p1.len() <= 5);
    for p in &p1 {
        let n = s.nodes.iter().find(|n| n.id == p.target).unwrap();
        assert!(breakwatch::saliency::interaction_kind(n).is_some(), "{}", n.tag);
    }
}
