#include <stdio.h>
#include <string.h>

#include "trof.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    TrofStatus s_ = (expr);                                                \
    if (s_ != TROF_STATUS_OK) {                                            \
      const char *m_ = trof_last_error();                                  \
      fprintf(stderr, "%s failed: %d %s\n", #expr, (int)s_, m_ ? m_ : ""); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  enum { W = 16, H = 12 };
  double data[W * H];
  for (int i = 0; i < W * H; ++i) data[i] = (i % W) < W / 2 ? 0.1 : 0.9;

  TrofImage *img = NULL;
  TrofConfig *cfg = NULL;
  TrofResult *res = NULL;
  CHECK(trof_image_new(W, H, data, &img));
  CHECK(trof_config_new(2, 10.0, &cfg));
  CHECK(trof_segment(img, cfg, &res));

  unsigned int labels[W * H];
  CHECK(trof_result_labels(res, labels, W * H));
  for (int i = 0; i < W * H; ++i) {
    if (labels[i] != ((i % W) >= W / 2)) {
      fprintf(stderr, "label %d wrong\n", i);
      return 1;
    }
  }
  double means[2];
  CHECK(trof_result_means(res, means, 2));
  char *json = NULL;
  CHECK(trof_result_report_json(res, cfg, &json));
  if (strstr(json, "\"tau\"") == NULL) return 1;
  trof_string_free(json);

  TrofConfig *bad = NULL;
  if (trof_config_new(1, 10.0, &bad) != TROF_STATUS_INVALID_ARGUMENT || bad != NULL) return 1;
  if (trof_last_error() == NULL) return 1;

  trof_result_free(res);
  trof_config_free(cfg);
  trof_image_free(img);
  printf("ok %s K=%zu m=(%.3f, %.3f)\n", trof_version(), (size_t)2, means[0], means[1]);
  return 0;
}
