#pragma once

// First-order MAML over coordinate MLPs, plain or partitioned.
//
// A task is an image plus an optional head mask. The shared initialization
// theta0 is copied into every head; each copy takes m plain gradient steps
// on its own region, and the meta-gradient is the gradient of the summed head
// losses at the adapted weights (second-order terms dropped), averaged over
// the tasks of a batch.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinr/autodiff.hpp"
#include "pinr/image.hpp"
#include "pinr/partition.hpp"
#include "pinr/trainer.hpp"

namespace pinr {

struct MetaConfig {
    ModelConfig model;
    int inner_steps = 3;
    /// Inner step sizes, one per step (a single value is broadcast).
    std::vector<double> alpha{1e-5};
    double beta = 1e-4;
    int batch_size = 4;
    int outer_steps = 0;
    LossReduction reduction = LossReduction::Sum;
    std::uint64_t seed = 0;
    int threads = 0;
    /// Mask rule used during training: "none", "pog" or "pos".
    std::string train_rule = "none";
    /// When > 0, the returned theta0 is the one at the end of the window of
    /// this many outer steps with the lowest mean adapted training loss.
    /// First-order updates with a fixed alpha can drift late in training.
    int select_window = 0;
    /// Write a checkpoint every N outer steps into checkpoint_dir (0 = never).
    int checkpoint_every = 0;
    std::string checkpoint_dir;

    /// alpha expanded to inner_steps entries; throws ConfigError when invalid.
    std::vector<double> alpha_schedule() const;
};

struct MetaState {
    ParamSet theta0;
    ModelConfig model;
    int inner_steps = 3;
    std::vector<double> alpha;
    double beta = 1e-4;
    LossReduction reduction = LossReduction::Sum;
    std::int64_t outer_step = 0;
    std::string train_rule = "none";
    AdamState adam;

    static MetaState init(const MetaConfig& config);
};

/// One task: an image and, for partitioned meta-learning, its head mask.
/// Without a mask the whole image is one region.
struct Task {
    const ImageField* image = nullptr;
    const PartitionMask* mask = nullptr;
};

struct AdaptResult {
    std::vector<ParamSet> heads;
    /// Loss of each head at its adapted weights (reduction as configured).
    std::vector<double> losses;
    /// Sum over heads of the gradient at the adapted weights.
    ParamSet meta_grad;
    bool ok = true;
    std::string failure;
};

/// Copies theta0 into each head and takes alpha.size() gradient steps per head
/// on that head's pixels. Non-finite losses mark the task as failed.
AdaptResult inner_adapt(const ParamSet& theta0, const ModelConfig& model, const Task& task,
                        const std::vector<double>& alpha, LossReduction reduction = LossReduction::Sum);

struct OuterStepReport {
    int tasks_used = 0;
    int tasks_skipped = 0;
    double mean_adapted_loss = 0.0;
    ParamSet meta_grad;  // mean over used tasks
    std::vector<std::string> log;
};

/// Adapts every task (concurrently), averages the meta-gradients in task order
/// and applies Adam at rate beta to theta0. Throws TrainingError when every
/// task failed.
OuterStepReport outer_step(MetaState& state, const std::vector<Task>& batch, int threads = 0);

/// Runs config.outer_steps outer steps over batches drawn without replacement
/// per batch from `corpus` (masks[i] belongs to corpus[i]; empty masks = plain).
MetaState meta_train(const std::vector<ImageField>& corpus, const std::vector<PartitionMask>& masks,
                     const MetaConfig& config, std::vector<double>* loss_trace = nullptr);

struct FinetuneResult {
    std::vector<ParamSet> heads;
    /// psnr[v] is the PSNR after v views (v = 0 is theta0's raw prediction).
    std::vector<double> psnr;
    ImageField reconstruction;
    FitReport report;
};

/// Fine-tunes theta0 on one image with `views` inner steps per head.
FinetuneResult meta_finetune(const MetaState& state, const ImageField& image, const PartitionMask* mask,
                             int views, const std::vector<double>& alpha);

/// Checkpoint: `<stem>.inrp` weights plus `<stem>.meta` text sidecar.
void save_meta_checkpoint(const std::string& stem, const MetaState& state);
MetaState load_meta_checkpoint(const std::string& stem);

}  // namespace pinr
