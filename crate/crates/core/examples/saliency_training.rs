//! Trains the saliency classifier on synthetic blocks, reports its
//! cross-validated AUC, then scores the blocks of the video fixture and
//! samples an interaction plan weighted by saliency.

use anyhow::Result;
use breakwatch::learn::cross_validate;
use breakwatch::saliency::{plan_interactions, saliency_dataset, saliency_trainer, score_page, train_saliency_model};
use breakwatch::segmentation::{leaf_blocks, SegmentConfig};
use breakwatch::synth::{broken_video_triple, saliency_corpus};

fn main() -> Result<()> {
    let blocks = saliency_corpus(80, 5);
    let d = saliency_dataset(&blocks);
    println!("{} blocks, class counts {:?}", d.len(), d.class_counts());
    let cv = cross_validate(&d, 5, &saliency_trainer(5))?;
    println!("5-fold AUC {:.3} ± {:.3}", cv.mean_auc, cv.std_auc);

    let m = train_saliency_model(&blocks, 5)?;
    let page = broken_video_triple().none;
    let (h, scored) = score_page(&page, &m, &SegmentConfig::default())?;
    for b in &scored {
        println!("  block {:>3}: p(salient) = {:.2}", b.block.0, b.probability);
    }
    let weighted: Vec<_> = leaf_blocks(&h)
        .into_iter()
        .filter_map(|b| scored.iter().find(|x| x.block == b.id).map(|x| (b, x.probability)))
        .collect();
    for p in plan_interactions(&page, &weighted, 1, 5) {
        let n = page.tree().node(p.target).unwrap();
        println!("  {:?} <{}> #{} (block {}, weight {:.2})", p.kind, n.tag, p.target.0, p.source_block.0, p.weight);
    }
    Ok(())
}
