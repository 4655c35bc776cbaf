// Placeholder; replaced once the pipeline modules land.
int main() { return 0; }
