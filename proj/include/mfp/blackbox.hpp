#pragma once

#include "mfp/model.hpp"
#include "mfp/tensor.hpp"

namespace mfp {

// The only capability the verification stage has against a suspect: a
// prediction API with declared dimensions. Implementations must answer
// repeated identical queries identically.
class BlackBoxModel {
public:
    virtual ~BlackBoxModel() = default;
    virtual int d_in() const = 0;
    virtual int d_out() const = 0;
    virtual Tensor predict(const Tensor& batch) = 0;
};

class LocalBlackBox : public BlackBoxModel {
public:
    explicit LocalBlackBox(const SequentialModel& m) : model_(&m) {}
    int d_in() const override { return model_->d_in; }
    int d_out() const override { return model_->d_out; }
    Tensor predict(const Tensor& batch) override { return mfp::predict(*model_, batch); }

private:
    const SequentialModel* model_;
};

}  // namespace mfp
