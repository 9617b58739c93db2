#include "panoweave/image.hpp"

#include "panoweave/errors.hpp"

namespace panoweave {

ErpImage::ErpImage(Tensor t) : data(std::move(t)) {
  if (data.width() != 2 * data.height() || data.height() <= 0) {
    throw ShapeError("ERP image must be C x H x 2H");
  }
}

PerspImage::PerspImage(Tensor t, const CameraPose& p,
                       const CameraIntrinsics& intr)
    : data(std::move(t)), pose(p), intrinsics(intr) {
  if (data.height() != intr.height || data.width() != intr.width) {
    throw ShapeError("perspective image does not match its intrinsics");
  }
}

}  // namespace panoweave
