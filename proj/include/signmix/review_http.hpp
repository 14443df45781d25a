#pragma once

// HTTP transport for ReviewService.
//
//   GET  /tasks/next?expert=ID   -> "task ..." record or "none"
//   POST /votes                  body: JSON {expert, pair_a, pair_b, verdict}
//                                or a "vote expert=.. pair_a=.. pair_b=.. verdict=.." line
//   GET  /progress               -> "progress ..." record
//
// Append "format=json" to the query string for JSON responses.

#include <memory>
#include <string>

#include "signmix/review.hpp"

namespace signmix {

class ReviewHttpServer {
 public:
  explicit ReviewHttpServer(ReviewService& service);
  ~ReviewHttpServer();
  ReviewHttpServer(const ReviewHttpServer&) = delete;
  ReviewHttpServer& operator=(const ReviewHttpServer&) = delete;

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace signmix
